// Gesture → intent translation. This table mirrors the headless client's
// (promptpad/client.py); the fidelity test pins both against one fixture.

export interface Gesture {
	gesture: string;
	[key: string]: unknown;
}

export interface IntentPayload {
	reqId: number;
	intent: string;
	args: Record<string, unknown>;
}

export const GESTURE_TO_INTENT: Record<string, string> = {
	addBlock: 'insertBlock',
	deleteBlock: 'deleteBlock',
	type: 'editText',
	selectNode: 'createAnchor',
	mechanismIcon: 'createLink',
	popupAccept: 'acceptShare',
	popupDecline: 'declineShare',
	dehighlightLink: 'unlink',
	cancelRequest: 'cancelRequest',
	resolveMessage: 'resolveMessage',
	generate: 'regenerate',
	promptFromCode: 'promptFromCode',
	rollback: 'rollback',
	runCode: 'execute',
	explain: 'explain',
	resetSession: 'resetSession'
};

const GESTURE_ARGS: Record<string, string[]> = {
	addBlock: ['kind', 'content', 'afterBlockId', 'beforeBlockId', 'level'],
	deleteBlock: ['blockId'],
	type: ['blockId', 'rangeEdits'],
	selectNode: ['blockId', 'start', 'end'],
	mechanismIcon: ['kind', 'source', 'target', 'message'],
	popupAccept: ['linkId'],
	popupDecline: ['linkId'],
	dehighlightLink: ['linkId'],
	cancelRequest: ['linkId'],
	resolveMessage: ['messageId'],
	generate: ['blockId'],
	promptFromCode: ['blockId'],
	rollback: ['blockId', 'toVersion'],
	runCode: ['blockId'],
	explain: ['blockId'],
	resetSession: []
};

export function gestureToIntent(gesture: Gesture, reqId: number): IntentPayload {
	const intent = GESTURE_TO_INTENT[gesture.gesture];
	if (intent === undefined) {
		throw new Error(`unknown gesture: ${gesture.gesture}`);
	}
	const args: Record<string, unknown> = {};
	for (const key of GESTURE_ARGS[gesture.gesture]) {
		const value = gesture[key];
		if (value !== undefined && value !== null) {
			args[key] = value;
		}
	}
	return { reqId, intent, args };
}
