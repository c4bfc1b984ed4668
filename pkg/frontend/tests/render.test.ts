import { describe, expect, it } from 'vitest';

import { lineDiff, reconstructFrom, reconstructTo } from '../src/diff.js';
import {
	renderEditor,
	renderHistory,
	renderMessages,
	renderPopup,
	renderWiki
} from '../src/render.js';
import { emptyView, parseHistory } from '../src/viewmodel.js';

describe('line diff', () => {
	it('marks replacement lines', () => {
		const rows = lineDiff('encode df', 'encode df2');
		expect(rows).toEqual([
			{ type: 'del', text: 'encode df' },
			{ type: 'ins', text: 'encode df2' }
		]);
	});

	it('round-trips both directions', () => {
		const a = 'one\ntwo\nthree';
		const b = 'one\nTWO\nthree\nfour';
		const rows = lineDiff(a, b);
		expect(reconstructFrom(rows)).toBe(a);
		expect(reconstructTo(rows)).toBe(b);
	});
});

describe('panels render from the view model', () => {
	it('empty doc renders empty panels', () => {
		const view = emptyView('d');
		expect(renderEditor(view)).toBe('');
		expect(renderWiki(view.wiki, new Set())).toBe('<ul class="wiki"></ul>');
		expect(renderMessages(view.messages)).toBe('<ul class="messages"></ul>');
	});

	it('blocks render with kind, author, and escaping', () => {
		const view = emptyView('d');
		view.blocks.push({
			id: 'b1',
			kind: 'prompt',
			level: 1,
			content: 'use <df> & co',
			createdBy: 'alice',
			authorLast: 'alice',
			sourcePromptId: null,
			updatedAt: 1,
			execResult: null
		});
		const html = renderEditor(view);
		expect(html).toContain('data-block="b1"');
		expect(html).toContain('use &lt;df&gt; &amp; co');
		expect(html).toContain('generate');
	});

	it('valid anchors become highlighted marks', () => {
		const view = emptyView('d');
		view.blocks.push({
			id: 'b1', kind: 'prompt', level: 1, content: 'use df now',
			createdBy: 'a', authorLast: 'a', sourcePromptId: null, updatedAt: 1,
			execResult: null
		});
		view.anchors.push({
			id: 'a1', blockId: 'b1', start: 4, end: 6, status: 'valid',
			owner: 'a', wholeSection: false
		});
		expect(renderEditor(view)).toContain('<mark class="anchor anchor-valid" data-anchor="a1">df</mark>');
	});

	it('wiki folding hides prompts without touching data', () => {
		const tree = [
			{
				block: 'h1',
				level: 1,
				label: 'Task',
				prompts: [{ block: 'p1', label: 'prompt one', badges: [] }],
				children: []
			}
		];
		expect(renderWiki(tree, new Set())).toContain('prompt one');
		expect(renderWiki(tree, new Set(['h1']))).not.toContain('prompt one');
	});

	it('wiki badges carry mechanism colors and the dot marks actioned prompts', () => {
		const tree = [
			{
				block: 'h1',
				level: 1,
				label: 'Task',
				prompts: [
					{ block: 'p1', label: 'linked prompt', badges: [['a1', 'link', 'alice'] as [string, string, string]] }
				],
				children: []
			}
		];
		const html = renderWiki(tree, new Set());
		expect(html).toContain('badge-link');
		expect(html).toContain('<i class="dot"></i>');
	});

	it('unprocessed messages float first with a dot', () => {
		const html = renderMessages([
			{ id: 'm2', actionType: 'request-pending', actor: 'bob', linkId: 'l', blockId: 'b', lamport: 5, seq: 1, processed: false },
			{ id: 'm1', actionType: 'link-created', actor: 'bob', linkId: 'l', blockId: 'b', lamport: 4, seq: 0, processed: true }
		]);
		expect(html.indexOf('m2')).toBeLessThan(html.indexOf('m1'));
		expect(html).toContain('unprocessed');
	});

	it('history shows diff runs against the previous version', () => {
		const records = parseHistory(
			[
				'{"blockId":"b","versionNo":1,"promptText":"encode df","codeText":"","cause":"manual-edit","actor":"a","linkId":null,"lamport":1,"parentVersionNo":0,"opId":"a:1"}',
				'{"blockId":"b","versionNo":2,"promptText":"encode df2","codeText":"","cause":"sync-propagate","actor":"system via a","linkId":"L","lamport":2,"parentVersionNo":1,"opId":"a:2"}'
			].join('\n')
		);
		const html = renderHistory(records, 2);
		expect(html).toContain('diff-del');
		expect(html).toContain('diff-ins');
		expect(html).toContain('via L');
		expect(html).toContain('data-rollback="1"');
	});

	it('popup offers accept and decline', () => {
		const html = renderPopup({ linkId: 'l9', from: 'bob', message: 'take df' });
		expect(html).toContain('data-accept');
		expect(html).toContain('data-decline');
		expect(html).toContain('take df');
	});
});
